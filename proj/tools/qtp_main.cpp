#include "qtp/cli.hpp"

int main(int argc, char** argv) { return qtp::cli::main(argc, argv); }
