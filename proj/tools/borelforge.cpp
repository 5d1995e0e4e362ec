#include "bf/jobs.hpp"

int main(int argc, char** argv) { return bf::run_cli(argc, argv); }
