#include "intervalrisk/cli.hpp"

int main(int argc, char** argv) { return intervalrisk::cli::run(argc, argv); }
