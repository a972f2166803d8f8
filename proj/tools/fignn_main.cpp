#include "fignn/cli.hpp"

int main(int argc, char** argv) { return fignn::cli::run(argc, argv); }
