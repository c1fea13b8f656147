#include <string>
#include <vector>

#include "realcl/cli.hpp"

int main(int argc, char** argv) {
  return realcl::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
