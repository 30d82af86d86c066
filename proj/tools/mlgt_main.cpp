#include "mlgt/cli.hpp"

int main(int argc, char** argv) { return mlgt::run_cli(argc, argv); }
