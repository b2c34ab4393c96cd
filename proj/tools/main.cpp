#include "plroute/cli.hpp"

int main(int argc, char** argv) { return plroute::cli_main(argc, argv); }
