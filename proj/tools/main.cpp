#include "commands.hpp"

int main(int argc, char** argv) { return laborscope::cli::run(argc, argv); }
