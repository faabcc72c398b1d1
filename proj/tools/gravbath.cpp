#include "gravbath/cli.hpp"

int main(int argc, char** argv) { return gravbath::cli::main_entry(argc, argv); }
