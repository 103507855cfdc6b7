def is_palindrome(text):
    cleaned = [c for c in text if c.isalnum()]
    left = 0
    right = len(cleaned) - 1
    while left < right:
        if cleaned[left] != cleaned[right]:
            return False
        left += 1
        right -= 1
    return True
