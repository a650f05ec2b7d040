#include "mslin/cli.hpp"

int main(int argc, char** argv) { return mslin::run_command(argc, argv); }
