#include "experiments.hpp"

int main(int argc, char** argv) { return rkint::cli::main(argc, argv); }
