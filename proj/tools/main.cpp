#include "commands.hpp"

int main(int argc, char** argv) { return tvmcf::cli::main_entry(argc, argv); }
