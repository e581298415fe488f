#include "collab/cli.hpp"

int main(int argc, char** argv) { return collab::run_cli(argc, argv); }
