# Claycop Engine
