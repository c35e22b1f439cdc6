#include <string>
#include <vector>

#include "minimt/cli.hpp"

int main(int argc, char** argv) {
  return minimt::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
