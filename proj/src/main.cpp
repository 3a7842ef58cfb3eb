#include "msig/cli.hpp"

int main(int argc, char** argv) { return msig::run_cli(argc, argv); }
