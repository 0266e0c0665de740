"""mapstory: historical map captioning and storytelling.

Classifies a map along several caption categories with a decision tree of
vision-language classifiers, then composes a short narrative answering
where / what / when / why.
"""

__version__ = "0.1.0"
