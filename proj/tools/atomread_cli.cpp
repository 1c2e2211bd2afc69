#include "atomread/cli.hpp"

int main(int argc, char** argv) { return atomread::run_command(argc, argv); }
