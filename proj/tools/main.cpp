#include "cli.hpp"

int main(int argc, char** argv) { return mgnets::cli::run_cli(argc, argv); }
