#include "topicap/cli.hpp"

int main(int argc, char** argv) { return topicap::cli_dispatch(argc, argv); }
