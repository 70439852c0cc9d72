#include "blowup/cli.hpp"

int main(int argc, char** argv) { return blowup::run_command(argc, argv); }
