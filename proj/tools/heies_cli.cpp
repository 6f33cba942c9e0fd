#include "heies/cli.hpp"

int main(int argc, char** argv) { return heies::run_cli(argc, argv); }
