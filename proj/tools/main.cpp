#include "bdns/harness.hpp"

int main(int argc, char** argv) { return bdns::cli_main(argc, argv); }
