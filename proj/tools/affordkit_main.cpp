#include "affordkit/cli/commands.hpp"

int main(int argc, char** argv) { return affordkit::cli::run(argc, argv); }
