#include "commands.hpp"

int main(int argc, char** argv) { return pcftool::run(argc, argv); }
