#include "topobo/cli.hpp"

int main(int argc, char** argv) { return topobo::cli::run(argc, argv); }
