#include "hac/cli/commands.hpp"

int main(int argc, char** argv) { return hac::cli::main_entry(argc, argv); }
