#include "lattag/cli.hpp"

int main(int argc, char** argv) { return lattag::run_cli(argc, argv); }
