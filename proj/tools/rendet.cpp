#include "rendet/cli.hpp"

int main(int argc, char** argv) { return rendet::cli::run(argc, argv); }
