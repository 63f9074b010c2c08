#include "greyforce/cli.hpp"

int main(int argc, char** argv) { return greyforce::cli::run(argc, argv); }
