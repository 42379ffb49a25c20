#include "ctep/cli.hpp"

int main(int argc, char** argv) { return ctep::cli::run(argc, argv); }
