#include "lethe/cli.h"

int main(int argc, char** argv) { return lethe::RunCli(argc, argv); }
