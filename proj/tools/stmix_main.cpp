// Placeholder CLI entry; subcommands are wired up with the io layer.
int main() { return 0; }
