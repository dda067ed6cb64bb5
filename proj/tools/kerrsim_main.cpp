#include "kerrsim/cli.hpp"

int main(int argc, char** argv) { return kerrsim::cli::run(argc, argv); }
