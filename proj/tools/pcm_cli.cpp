#include "pcm/cli.hpp"

int main(int argc, char** argv) { return pcm::run_cli(argc, argv); }
