#include "diffpass/cli/cli.hpp"

int main(int argc, char** argv) { return diffpass::cli::run(argc, argv); }
