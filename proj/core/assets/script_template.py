# Task: {{task}}
# Inputs: {{inputs}}
# Outputs: {{outputs}}


class Script:
    def run(self{{arguments}}):
{{body}}
