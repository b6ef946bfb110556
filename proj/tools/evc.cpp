#include "evc/cli.hpp"

int main(int argc, char** argv) { return evc::cli::main_entry(argc, argv); }
