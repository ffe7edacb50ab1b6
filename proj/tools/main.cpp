#include "crowdplan/cli.hpp"

int main(int argc, char** argv) {
  return crowdplan::cli::run_command(argc, argv);
}
