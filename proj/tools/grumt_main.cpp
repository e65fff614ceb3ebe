#include "grumt/cli.hpp"

int main(int argc, char** argv) { return grumt::cli::dispatch(argc, argv); }
