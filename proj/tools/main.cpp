#include "pqlap/cli.hpp"

int main(int argc, char** argv) { return pqlap::run_cli(argc, argv); }
