#include "hwdock/cli.hpp"

int main(int argc, char** argv)
{
    return hwdock::dispatch(argc, argv);
}
