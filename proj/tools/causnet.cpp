#include "causnet/cli.hpp"

int main(int argc, char** argv) { return causnet::cli::run(argc, argv); }
