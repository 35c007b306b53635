#include "ist/cli.hpp"

int main(int argc, char** argv) { return ist::cli::run(argc, argv); }
