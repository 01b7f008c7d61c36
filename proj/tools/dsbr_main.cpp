#include "dsbr/cli.hpp"

int main(int argc, char** argv) { return dsbr::run_cli(argc, argv); }
