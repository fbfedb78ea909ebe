#include "beliefmap/cli.hpp"

int main(int argc, char** argv) { return beliefmap::run_cli(argc, argv); }
