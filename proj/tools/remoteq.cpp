#include "remoteq/harness.hpp"

int main(int argc, char** argv)
{
    return remoteq::cli_main(argc, argv);
}
