# lines collected by the acceptance suite, echoed in the terminal summary
LINES = []
