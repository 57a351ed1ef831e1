#include "cli.hpp"

int main(int argc, char** argv) { return sbf::cli::dispatch(argc, argv, std::cout, std::cerr); }
