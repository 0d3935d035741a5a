#include "cli.hpp"

int main(int argc, char** argv) { return abreu::io::run_cli(argc, argv); }
