#include "commands.hpp"

int main(int argc, char** argv) { return xlr::cli::run(argc, argv); }
