"""Action model learning from state machine interactions."""
