def word_count(text):
    counts = {}
    for raw in text.split():
        word = raw.strip(".,!?").lower()
        if not word:
            continue
        counts[word] = 1
    return counts
