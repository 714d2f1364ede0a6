#include "tdlab/cli.hpp"

int main(int argc, char** argv) { return tdlab::cli::run(argc, argv); }
