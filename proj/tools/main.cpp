#include "fibershrink/cli.hpp"

int main(int argc, char** argv) { return fibershrink::run_cli(argc, argv); }
