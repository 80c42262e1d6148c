#include "commands.hpp"

int main(int argc, char** argv) { return bmirl::cli::run(argc, argv); }
