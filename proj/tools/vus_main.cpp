#include <vector>

#include "vus/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vus::run_cli(args);
}
