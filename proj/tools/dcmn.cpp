#include "dcmn/cli.hpp"

int main(int argc, char** argv) { return dcmn::cli::run(argc, argv); }
