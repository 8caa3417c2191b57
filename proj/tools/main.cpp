#include "memsteer/cli.hpp"

int main(int argc, char** argv) { return memsteer::cli::run(argc, argv); }
