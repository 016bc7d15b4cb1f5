#include "reveal/cli.hpp"

int main(int argc, char** argv) { return reveal::cli::run(argc, argv); }
