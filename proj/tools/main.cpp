#include "langchange/cli.hpp"

int main(int argc, char** argv) { return langchange::cli::run(argc, argv); }
