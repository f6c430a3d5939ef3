#include "ellipticfund/cli.hpp"

int main(int argc, char** argv) { return ellipticfund::cli_main(argc, argv); }
