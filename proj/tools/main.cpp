#include "cli.hpp"

int main(int argc, char** argv) { return evsched::cli::main_entry(argc, argv); }
